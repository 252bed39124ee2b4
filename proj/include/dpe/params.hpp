#pragma once

#include "dpe/circuit_solver.hpp"
#include "dpe/device_models.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

namespace dpe {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ReadBias {
    double v_in = 0.6;
    double v_g = 1.2;      // 1T1R access gate
    double vdd = 1.2;      // 3T1R supply, also the MN2 column potential
    double v_readb = 0.0;  // 3T1R MP3 gate
};

struct WriteBias {
    double vdd = 3.3;  // 3T1R supply during SET
    double v_g = 1.2;  // 1T1R access gate during SET
    double v_readb = 0.0;
};

struct TrainSettings {
    double lr = 0.05;
    int epochs = 2000;
};

struct ModelParams {
    static constexpr int kVersion = 1;

    DeviceSet one_t1r;    // MN1
    DeviceSet three_t1r;  // MN1, MN2, MP3
    MemristorParams memristor;
    ReadBias read;
    WriteBias write;

    double t_read = 1e-6;
    double r_initial = 100e3;
    double set_pulse_width = 1e-6;  // pulse used for SET-current sweeps
    TransientOptions transient;

    double adc_resolution = 50e-9;
    double window_lo = 5e3;
    double window_hi = 20e3;

    std::map<std::string, TrainSettings> training;

    const DeviceSet& devices(CellKind kind) const { return kind == CellKind::OneT1R ? one_t1r : three_t1r; }
    DeviceSet& devices(CellKind kind) { return kind == CellKind::OneT1R ? one_t1r : three_t1r; }
    TrainSettings training_for(const std::string& dataset) const;
};

/// Built-in starting point; calibration refines it and the result ships as
/// config/calibrated.yaml.
ModelParams default_params();

ModelParams load_params(const std::string& path);
ModelParams params_from_yaml(const std::string& text);
std::string params_to_yaml(const ModelParams& p);
void save_params(const ModelParams& p, const std::string& path);

/// FNV-1a over the canonical YAML serialization, as 16 hex digits.
std::string config_hash(const ModelParams& p);

/// READ-bias netlist for the cell kind.
CellTopology read_topology(const ModelParams& p, CellKind kind);
/// SET-bias netlist; transient_set drives v_in on top of these rails.
CellTopology write_topology(const ModelParams& p, CellKind kind);

}  // namespace dpe
