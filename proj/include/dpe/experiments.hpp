#pragma once

#include "dpe/cell_models.hpp"
#include "dpe/crossbar.hpp"
#include "dpe/ml_pipeline.hpp"
#include "dpe/params.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace dpe {

// Tabular experiment output. Headers carry units: uA, uW, pJ, kohm.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

using Meta = std::vector<std::pair<std::string, std::string>>;

std::string fmt_num(double v);

/// "# key=value" lines, then the header and rows.
void write_csv(std::ostream& out, const Table& t, const Meta& meta);
void write_csv_file(const std::string& path, const Table& t, const Meta& meta);
/// File contents without the leading comment lines.
std::string csv_body(const std::string& path);

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotSpec {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    bool log_x = false;
    bool bars = false;  // draw the first series as a histogram
};

std::string svg_plot(const PlotSpec& spec, const std::vector<Series>& series);
void write_text_file(const std::string& path, const std::string& text);

// cell, drive_V, I_set_uA, I_settled_uA, P_set_uW, R_final_kohm
Table sweep_set(const ModelParams& p, const std::vector<CellKind>& kinds, const std::vector<double>& drives);

// cell, R_kohm, I_out_uA, I_in_uA, P_uW, E_pJ
Table sweep_read(const ModelParams& p, const std::vector<CellKind>& kinds, const std::vector<double>& resistances,
                 Accounting acct);

// cell, R_kohm, n, mean_uA, std_uA, min_uA, max_uA
Table monte_carlo_stats(CellKind kind, double r, const McStats& s);
// bin_lo_uA, bin_hi_uA, count
Table monte_carlo_histogram(const McStats& s);

// cell, drive_V, width_s, R_kohm
Table pulse_width(const ModelParams& p, const std::vector<CellKind>& kinds, const std::vector<double>& drives,
                  const std::vector<double>& widths);

// quantity, 1T1R, 3T1R, ratio_1t1r_over_3t1r at one resistance
Table compare(const ModelParams& p, Accounting acct, double r = 5e3);

struct ClassifyOptions {
    std::uint64_t seed = 1;
    std::string data_dir = "data";
    std::vector<CellKind> kinds{CellKind::OneT1R, CellKind::ThreeT1R};
    Accounting accounting = Accounting::Full;
    // Perfect ADC, exact writes and cell current proportional to conductance.
    bool ideal = false;
    // Per-cell transistor variation and LRS spread when programming 3T1R.
    bool program_noise = false;
};

struct KindOutcome {
    CellKind kind = CellKind::OneT1R;
    Metrics train;
    Metrics test;
    Crossbar crossbar;
};

struct ClassifyReport {
    std::string dataset;
    TrainSettings settings;
    TrainedModel model;
    Metrics float_train;
    Metrics float_test;
    std::vector<KindOutcome> kinds;
    std::vector<std::string> warnings;
};

/// Loads, encodes (4 bins), trains with the config's per-dataset settings,
/// maps to conductances and evaluates each requested cell kind. 1T1R cells
/// are written exactly because DC programming cannot reach the low end of the
/// window; 3T1R cells are programmed through the DC drive map.
ClassifyReport classify(const ModelParams& p, const std::string& dataset, const ClassifyOptions& opts);

/// 1T1R mean test energy over 3T1R mean test energy; 0 when either is absent.
double energy_improvement(const ClassifyReport& r);

// dataset, cell, train_acc_pct, test_acc_pct, tie_rate_pct, energy_pJ,
// energy_improvement_x, float_test_acc_pct
Table classification_table(const std::vector<ClassifyReport>& reports);
// dataset, cell, true_class, predicted_class, count
Table confusion_table(const std::vector<ClassifyReport>& reports);

}  // namespace dpe
