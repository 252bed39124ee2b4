#pragma once

#include "dpe/device_models.hpp"

#include <optional>
#include <stdexcept>
#include <string>

namespace dpe {

class NoOperatingPoint : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Rail values for the two fixed cell netlists.
//
// 1T1R: memristor top = v_in, memristor bottom = MN1 drain, MN1 gate = v_g,
//       MN1 source = column (0 V).
// 3T1R: MP3 source = vdd, MP3 gate = v_readb, MP3 drain = memristor top,
//       memristor bottom = MN1 drain = MN2 gate, MN1 gate = v_in,
//       MN2 drain = column held at v_column, MN1/MN2 sources at 0 V.
struct Rails {
    double vdd = 1.2;
    double v_in = 0.6;
    double v_g = 1.2;
    double v_readb = 0.0;
    double v_column = 1.2;
};

struct CellTopology {
    CellKind kind = CellKind::OneT1R;
    DeviceSet devices;
    Rails rails;

    std::size_t unknowns() const { return kind == CellKind::OneT1R ? 1 : 2; }
};

struct DcSolution {
    // 1T1R: v_top equals the v_in rail, v_bottom is the only unknown.
    double v_top = 0.0;
    double v_bottom = 0.0;

    double i_mem = 0.0;  // top -> bottom through the memristor
    double i_mn1 = 0.0;  // into MN1 drain
    double i_mn2 = 0.0;  // into MN2 drain (3T1R only)
    double i_mp3 = 0.0;  // out of MP3 drain into the top node (3T1R only)

    bool converged = false;
    bool used_fallback = false;
    int iterations = 0;
    double residual = 0.0;  // max |KCL| over internal nodes, A

    double v_mem() const { return v_top - v_bottom; }
};

struct SolverOptions {
    double tol_kcl = 1e-12;
    int max_newton = 200;
    double max_step = 0.1;
    // Jacobian-only regularization; keeps floating nodes solvable.
    double gmin = 1e-12;
};

/// KCL residuals (A) at the internal nodes for the given node voltages.
/// Index 0 is the memristor bottom for 1T1R; (top, bottom) for 3T1R.
struct KclResidual {
    double top = 0.0;
    double bottom = 0.0;
    double max_abs() const;
};
KclResidual kcl_residual(const CellTopology& top, double r, const DeviceSet& devices, double v_top,
                         double v_bottom);

/// Newton iteration on the internal node voltages with per-node step clamping
/// and residual backtracking. Falls back to nested bisection when Newton does
/// not reach tol_kcl.
DcSolution solve_dc(const CellTopology& top, double r, const VariationSample& vars,
                    const SolverOptions& opts = {}, const DcSolution* warm_start = nullptr);

struct TransientOptions {
    double dt = 10e-9;
    // Upper bound on the filament-state change per integration step.
    double max_dw = 2e-4;
    bool apply_lrs_noise = false;
    SolverOptions solver;
};

struct TransientResult {
    double resistance = 0.0;        // after noise and clamping
    double resistance_clean = 0.0;  // before the LRS multiplier
    MemristorState state;
    double peak_current = 0.0;
    double final_current = 0.0;
    double final_v_mem = 0.0;
    double elapsed = 0.0;  // simulated time before the state froze or the pulse ended
    int steps = 0;
};

/// Drives `pulse_amplitude` on the cell's input rail (v_in for both kinds) for
/// `pulse_width` seconds, re-solving the operating point as the filament grows.
/// The step starts at dt and adapts so each step changes w by at most max_dw.
TransientResult transient_set(const CellTopology& top, const MemristorParams& mem, double pulse_amplitude,
                              double pulse_width, const MemristorState& m0, const VariationSample& vars,
                              const TransientOptions& opts = {});

inline constexpr double kDcProgrammingWidth = 10e-3;

/// DC programming as a long pulse.
TransientResult dc_set(const CellTopology& top, const MemristorParams& mem, double drive,
                       const MemristorState& m0, const VariationSample& vars, const TransientOptions& opts = {});

}  // namespace dpe
