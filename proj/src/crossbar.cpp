#include "dpe/crossbar.hpp"

#include "dpe/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dpe {

ReadLut::ReadLut(const ModelParams& p, CellKind kind, Accounting acct, std::size_t points) {
    if (points < 2) throw std::invalid_argument("ReadLut needs at least two points");
    g_lo_ = 1.0 / p.window_hi;
    g_hi_ = 1.0 / p.window_lo;
    i_out_.resize(points);
    power_.resize(points);
    for (std::size_t k = 0; k < points; ++k) {
        const double g = g_lo_ + (g_hi_ - g_lo_) * static_cast<double>(k) / static_cast<double>(points - 1);
        const ReadResult rr = read_current(p, {kind, 1.0 / g}, acct);
        i_out_[k] = rr.i_out;
        power_[k] = rr.power;
    }
}

double ReadLut::interp(const std::vector<double>& y, double r) const {
    const double g = 1.0 / r;
    const double pos = (g - g_lo_) / (g_hi_ - g_lo_) * static_cast<double>(y.size() - 1);
    // Outside the window the end segments are extended linearly.
    const auto k = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0, static_cast<double>(y.size() - 2)));
    const double t = pos - static_cast<double>(k);
    return y[k] + t * (y[k + 1] - y[k]);
}

double ReadLut::transconductance() const {
    return (i_out_.back() - i_out_.front()) / (g_hi_ - g_lo_);
}

ProgrammingMap::ProgrammingMap(const ModelParams& p, CellKind kind, double drive_lo, double drive_hi,
                               std::size_t grid)
    : p_(p), kind_(kind) {
    drive_.resize(grid);
    r_.resize(grid);
    for (std::size_t k = 0; k < grid; ++k) {
        drive_[k] = drive_lo + (drive_hi - drive_lo) * static_cast<double>(k) / static_cast<double>(grid - 1);
        r_[k] = resistance_at(drive_[k]);
    }
}

double ProgrammingMap::resistance_at(double drive) const {
    return dc_programmed_resistance(p_, kind_, drive);
}

double ProgrammingMap::drive_for(double target, double rel_tol) const {
    if (!(target <= r_.front() && target >= r_.back())) {
        throw TargetUnreachable("resistance " + std::to_string(target) + " ohm outside the programmable range");
    }
    // r_ is nonincreasing in drive.
    std::size_t k = 0;
    while (k + 2 < r_.size() && r_[k + 1] > target) ++k;
    double lo = drive_[k];
    double hi = drive_[k + 1];
    double best = lo;
    double best_err = std::abs(r_[k] - target) / target;
    for (int it = 0; it < 80 && best_err > rel_tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double r = resistance_at(mid);
        const double err = std::abs(r - target) / target;
        if (err < best_err) {
            best = mid;
            best_err = err;
        }
        if (r > target) lo = mid;
        else hi = mid;
    }
    if (best_err > 0.01) {
        throw TargetUnreachable("drive map does not bracket " + std::to_string(target) + " ohm");
    }
    return best;
}

void refresh_reads(Crossbar& xb, const ModelParams& p) {
    const ReadLut lut(p, xb.kind, xb.accounting);
    xb.cell_current.resize(xb.resistance.size());
    xb.cell_power.resize(xb.resistance.size());
    for (std::size_t k = 0; k < xb.resistance.size(); ++k) {
        xb.cell_current[k] = lut.current(xb.resistance[k]);
        xb.cell_power[k] = lut.power(xb.resistance[k]);
    }
    xb.bias_supply = xb.kind == CellKind::OneT1R ? p.read.v_in : p.read.vdd;
}

Crossbar program_array(const ModelParams& p, CellKind kind, std::size_t rows, std::size_t cols,
                       const std::vector<double>& targets, const std::vector<double>& bias,
                       const ProgramOptions& opts) {
    if (targets.size() != rows * cols) throw std::invalid_argument("target matrix size mismatch");
    if (bias.size() != cols) throw std::invalid_argument("bias vector size mismatch");
    for (double b : bias) {
        if (!(b >= 0.0)) throw std::invalid_argument("bias currents must be non-negative");
    }
    // Tiny slack for targets produced by 1/G round trips at the window edges.
    const double lo = p.window_lo * (1.0 - 1e-9);
    const double hi = p.window_hi * (1.0 + 1e-9);
    for (double t : targets) {
        if (!(t >= lo && t <= hi)) {
            throw TargetUnreachable("target " + std::to_string(t) + " ohm outside the programming window");
        }
    }

    Crossbar xb;
    xb.kind = kind;
    xb.rows = rows;
    xb.cols = cols;
    xb.bias = bias;
    xb.adc_resolution = p.adc_resolution;
    xb.t_read = p.t_read;
    xb.accounting = opts.accounting;
    xb.resistance.resize(targets.size());

    if (opts.ideal_write) {
        for (std::size_t k = 0; k < targets.size(); ++k) xb.resistance[k] = std::clamp(targets[k], p.window_lo, p.window_hi);
    } else {
        const ProgrammingMap map(p, kind);
        const CellTopology top = write_topology(p, kind);
        TransientOptions topts = p.transient;
        topts.apply_lrs_noise = opts.noise;
        const MemristorState m0 = MemristorState::from_resistance(p.memristor, p.r_initial);
        for (std::size_t k = 0; k < targets.size(); ++k) {
            const double drive = map.drive_for(targets[k]);
            double r;
            if (opts.noise) {
                const VariationSample v = sample_variation(top.devices, opts.seed, k, streams::programming);
                r = dc_set(top, p.memristor, drive, m0, v, topts).resistance;
            } else {
                r = map.resistance_at(drive);
            }
            xb.resistance[k] = std::clamp(r, p.window_lo, p.window_hi);
        }
    }
    refresh_reads(xb, p);
    return xb;
}

std::vector<double> column_currents(const Crossbar& xb, const std::vector<std::uint8_t>& spikes) {
    if (spikes.size() != xb.rows) throw std::invalid_argument("spike vector length != rows");
    std::vector<double> out = xb.bias;
    for (std::size_t i = 0; i < xb.rows; ++i) {
        if (!spikes[i]) continue;
        for (std::size_t j = 0; j < xb.cols; ++j) out[j] += xb.cell_current[i * xb.cols + j];
    }
    return out;
}

long long quantize(double current, double resolution, AdcMode mode) {
    if (resolution <= 0.0) throw std::invalid_argument("quantize: resolution must be positive");
    double x = current / resolution;
    // Division can land a hair below an exact level (2.90e-6 / 50e-9 is
    // 57.999...); nudge so exact multiples stay on their level.
    x += 1e-9 * std::max(1.0, std::abs(x));
    return static_cast<long long>(mode == AdcMode::Floor ? std::floor(x) : std::round(x));
}

double quantize_value(double current, double resolution, AdcMode mode) {
    return static_cast<double>(quantize(current, resolution, mode)) * resolution;
}

InferenceResult infer(const Crossbar& xb, const std::vector<std::uint8_t>& spikes, std::uint64_t seed,
                      std::uint64_t sample_index) {
    InferenceResult res;
    res.currents = column_currents(xb, spikes);
    const bool ideal = xb.adc_resolution <= 0.0;
    if (ideal) {
        const double top = *std::max_element(res.currents.begin(), res.currents.end());
        for (std::size_t j = 0; j < xb.cols; ++j) {
            if (res.currents[j] == top) res.tied.push_back(j);
        }
    } else {
        res.levels.resize(xb.cols);
        for (std::size_t j = 0; j < xb.cols; ++j) res.levels[j] = quantize(res.currents[j], xb.adc_resolution, xb.adc_mode);
        const long long top = *std::max_element(res.levels.begin(), res.levels.end());
        for (std::size_t j = 0; j < xb.cols; ++j) {
            if (res.levels[j] == top) res.tied.push_back(j);
        }
    }
    res.tie = res.tied.size() > 1;
    if (res.tie) {
        auto eng = keyed_engine(seed, sample_index, streams::tie_break);
        std::uniform_int_distribution<std::size_t> pick(0, res.tied.size() - 1);
        res.winner = res.tied[pick(eng)];
    } else {
        res.winner = res.tied.front();
    }

    double power = 0.0;
    for (std::size_t i = 0; i < xb.rows; ++i) {
        if (!spikes[i]) continue;
        for (std::size_t j = 0; j < xb.cols; ++j) power += xb.cell_power[i * xb.cols + j];
    }
    if (xb.bias_energy) {
        for (double b : xb.bias) power += b * xb.bias_supply;
    }
    res.energy = power * xb.t_read;
    return res;
}

void save_crossbar(const Crossbar& xb, const std::string& csv_path, const std::string& json_path) {
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot write " + csv_path);
    csv << "row";
    for (std::size_t j = 0; j < xb.cols; ++j) csv << ",col" << j << "_kohm";
    csv << '\n';
    char buf[64];
    for (std::size_t i = 0; i < xb.rows; ++i) {
        csv << i;
        for (std::size_t j = 0; j < xb.cols; ++j) {
            std::snprintf(buf, sizeof buf, ",%.17g", xb.r(i, j) * 1e-3);
            csv << buf;
        }
        csv << '\n';
    }

    nlohmann::json j;
    j["kind"] = std::string(to_string(xb.kind));
    j["rows"] = xb.rows;
    j["cols"] = xb.cols;
    j["bias_currents_A"] = xb.bias;
    j["adc_resolution_A"] = xb.adc_resolution;
    j["adc_mode"] = xb.adc_mode == AdcMode::Floor ? "floor" : "round";
    j["t_read_s"] = xb.t_read;
    j["accounting"] = std::string(to_string(xb.accounting));
    j["bias_energy"] = xb.bias_energy;
    std::ofstream js(json_path);
    if (!js) throw std::runtime_error("cannot write " + json_path);
    js << j.dump(2) << '\n';
}

Crossbar load_crossbar(const ModelParams& p, const std::string& csv_path, const std::string& json_path) {
    std::ifstream js(json_path);
    if (!js) throw std::runtime_error("cannot read " + json_path);
    const nlohmann::json j = nlohmann::json::parse(js);
    Crossbar xb;
    xb.kind = parse_cell_kind(j.at("kind").get<std::string>());
    xb.rows = j.at("rows").get<std::size_t>();
    xb.cols = j.at("cols").get<std::size_t>();
    xb.bias = j.at("bias_currents_A").get<std::vector<double>>();
    xb.adc_resolution = j.at("adc_resolution_A").get<double>();
    xb.adc_mode = j.value("adc_mode", std::string("floor")) == "round" ? AdcMode::Round : AdcMode::Floor;
    xb.t_read = j.at("t_read_s").get<double>();
    xb.accounting = parse_accounting(j.at("accounting").get<std::string>());
    xb.bias_energy = j.value("bias_energy", false);

    std::ifstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot read " + csv_path);
    std::string line;
    std::getline(csv, line);  // header
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');  // row index
        while (std::getline(ss, cell, ',')) xb.resistance.push_back(std::stod(cell) * 1e3);
    }
    if (xb.resistance.size() != xb.rows * xb.cols || xb.bias.size() != xb.cols) {
        throw std::runtime_error("crossbar files disagree on shape");
    }
    refresh_reads(xb, p);
    return xb;
}

}  // namespace dpe
