#pragma once

#include "dpe/cell_models.hpp"
#include "dpe/params.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpe {

class TargetUnreachable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class AdcMode { Floor, Round };

/// Nominal READ response on a grid uniform in conductance over the
/// programming window, linearly interpolated.
class ReadLut {
public:
    ReadLut() = default;
    ReadLut(const ModelParams& p, CellKind kind, Accounting acct, std::size_t points = 64);

    double current(double r) const { return interp(i_out_, r); }
    double power(double r) const { return interp(power_, r); }
    /// Secant slope dI/dG across the window (A/S).
    double transconductance() const;
    std::size_t size() const { return i_out_.size(); }

private:
    double interp(const std::vector<double>& y, double r) const;
    double g_lo_ = 0.0;
    double g_hi_ = 0.0;
    std::vector<double> i_out_;
    std::vector<double> power_;
};

/// Monotone drive -> DC-programmed resistance map for one cell kind, inverted
/// by bisection.
class ProgrammingMap {
public:
    ProgrammingMap(const ModelParams& p, CellKind kind, double drive_lo = 0.6, double drive_hi = 1.3,
                   std::size_t grid = 71);
    /// Drive whose noise-free DC programming lands within rel_tol of `target`.
    double drive_for(double target, double rel_tol = 1e-4) const;
    double resistance_at(double drive) const;

private:
    ModelParams p_;
    CellKind kind_;
    std::vector<double> drive_;
    std::vector<double> r_;
};

struct Crossbar {
    CellKind kind = CellKind::ThreeT1R;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> resistance;  // row-major, ohms
    std::vector<double> bias;        // per column, A
    double adc_resolution = 50e-9;
    double t_read = 1e-6;
    Accounting accounting = Accounting::Full;
    AdcMode adc_mode = AdcMode::Floor;
    bool bias_energy = false;
    double bias_supply = 0.0;  // V applied to the bias-current source when bias_energy is set

    // Per-cell READ current and power, filled from the lookup table.
    std::vector<double> cell_current;
    std::vector<double> cell_power;

    double r(std::size_t i, std::size_t j) const { return resistance[i * cols + j]; }
};

struct ProgramOptions {
    bool noise = false;        // per-cell transistor variation plus LRS multiplier
    bool ideal_write = false;  // realized resistance equals the target
    std::uint64_t seed = 0;
    Accounting accounting = Accounting::Full;
};

/// Programs every cell by inverting the DC drive map. Targets must lie inside
/// the configured resistance window.
Crossbar program_array(const ModelParams& p, CellKind kind, std::size_t rows, std::size_t cols,
                       const std::vector<double>& targets, const std::vector<double>& bias,
                       const ProgramOptions& opts = {});

/// Recomputes cell_current/cell_power from the resistance matrix.
void refresh_reads(Crossbar& xb, const ModelParams& p);

std::vector<double> column_currents(const Crossbar& xb, const std::vector<std::uint8_t>& spikes);

/// ADC level for a current; resolution must be positive. infer() treats a
/// crossbar resolution <= 0 as an ideal ADC and compares raw currents.
long long quantize(double current, double resolution, AdcMode mode = AdcMode::Floor);
/// Quantized current value, level * resolution.
double quantize_value(double current, double resolution, AdcMode mode = AdcMode::Floor);

struct InferenceResult {
    std::vector<double> currents;
    std::vector<long long> levels;
    std::vector<std::size_t> tied;  // columns sharing the top level
    std::size_t winner = 0;
    bool tie = false;
    double energy = 0.0;
};

/// Quantizes column currents and picks the winning column. Ties are broken
/// uniformly at random from a stream keyed by (seed, sample_index).
InferenceResult infer(const Crossbar& xb, const std::vector<std::uint8_t>& spikes, std::uint64_t seed,
                      std::uint64_t sample_index);

/// Resistance matrix as CSV plus a JSON sidecar with the remaining fields.
void save_crossbar(const Crossbar& xb, const std::string& csv_path, const std::string& json_path);
Crossbar load_crossbar(const ModelParams& p, const std::string& csv_path, const std::string& json_path);

}  // namespace dpe
