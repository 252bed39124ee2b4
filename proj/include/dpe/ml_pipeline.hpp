#pragma once

#include "dpe/crossbar.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpe {

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class NonFinite : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class DegenerateWeights : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DatasetInfo {
    std::string name;
    std::string file;  // relative to the data directory
    std::size_t samples;
    std::size_t features;
    std::size_t classes;
};

/// iris, wine, breast_cancer, banknote.
const std::vector<DatasetInfo>& known_datasets();
const DatasetInfo& dataset_info(const std::string& name);

struct RawDataset {
    std::string name;
    std::size_t n_features = 0;
    std::size_t n_classes = 0;
    std::vector<std::vector<double>> x;
    std::vector<int> y;
};

/// Headerless CSV, one sample per line: feature columns then an integer class
/// label starting at 0. Row, feature and class counts are checked against the
/// canonical values for `name`.
RawDataset load_dataset(const std::string& name, const std::string& path);

struct EncodedDataset {
    std::size_t n_features = 0;
    std::size_t bins = 0;
    std::size_t n_classes = 0;
    std::size_t width() const { return n_features * bins; }
    // Row f * bins + k is active when feature f falls in bin k.
    std::vector<std::vector<std::uint8_t>> x;
    std::vector<int> y;
    std::vector<std::vector<double>> edges;  // per feature, bins + 1 values
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::vector<std::string> warnings;
};

/// Seeded shuffle, floor(70%) train / rest test, then equal-width bins from the
/// training split's per-feature range. Out-of-range values clamp to the edge
/// bins; a feature constant on the training split always lands in bin 0.
EncodedDataset encode(const RawDataset& ds, std::size_t bins, std::uint64_t split_seed,
                      double train_fraction = 0.7);

struct TrainedModel {
    std::size_t inputs = 0;
    std::size_t classes = 0;
    std::vector<double> w;  // inputs x classes, row-major
    std::vector<double> b;
    double lr = 0.0;
    int epochs = 0;
    std::uint64_t seed = 0;
    std::vector<double> loss_trace;      // one entry per epoch
    std::vector<double> accuracy_trace;  // training accuracy per epoch

    std::vector<double> logits(const std::vector<double>& x) const;
    std::size_t predict(const std::vector<double>& x) const;
};

/// Uniform [-0.1, 0.1] initialization from the seed.
TrainedModel init_model(std::size_t inputs, std::size_t classes, std::uint64_t seed);

/// Mean over samples and classes of (softmax(Wx + b) - onehot(y))^2. When the
/// gradient pointers are non-null they receive dL/dW and dL/db.
double softmax_mse(const TrainedModel& m, const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                   std::vector<double>* grad_w = nullptr, std::vector<double>* grad_b = nullptr);

/// Full-batch gradient descent on the training split.
TrainedModel train(const EncodedDataset& enc, int epochs, double lr, std::uint64_t seed);

std::vector<double> as_dense(const std::vector<std::uint8_t>& spikes);

struct ConductanceMap {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> resistance;  // row-major, ohms
    std::vector<double> bias;        // per column, A
    double w_lo = 0.0;
    double w_hi = 0.0;
    double g_lo = 0.0;
    double g_hi = 0.0;
    double shift = 0.0;
    double scale = 0.0;  // siemens per unit weight
    double current_per_siemens = 0.0;
};

/// Shifts weights to be non-negative and maps [0, max(W + shift)] affinely
/// onto [g_lo, g_hi]. Biases become column currents
/// current_per_siemens * scale * (b_j - min b), which keeps the column order of
/// the float model when every sample drives the same number of rows and cell
/// current is current_per_siemens * G. A uniform W maps every cell to g_lo.
ConductanceMap map_to_conductance(const TrainedModel& m, double current_per_siemens, double g_lo = 1.0 / 20e3,
                                  double g_hi = 1.0 / 5e3);

struct Metrics {
    std::size_t n = 0;
    double accuracy = 0.0;     // percent
    double tie_rate = 0.0;     // percent
    double mean_energy = 0.0;  // J per sample
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

/// Hardware inference over the given sample indices. Tie-breaks are keyed by
/// (seed, sample index).
Metrics evaluate(const Crossbar& xb, const EncodedDataset& enc, const std::vector<std::size_t>& split,
                 std::uint64_t seed);

/// Float-model accuracy over the given sample indices.
Metrics evaluate_float(const TrainedModel& m, const EncodedDataset& enc, const std::vector<std::size_t>& split);

}  // namespace dpe
