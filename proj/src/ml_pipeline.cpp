#include "dpe/ml_pipeline.hpp"

#include "dpe/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace dpe {

const std::vector<DatasetInfo>& known_datasets() {
    static const std::vector<DatasetInfo> all{
        {"iris", "iris.csv", 150, 4, 3},
        {"wine", "wine.csv", 178, 13, 3},
        {"breast_cancer", "breast_cancer.csv", 569, 30, 2},
        {"banknote", "banknote.csv", 1372, 4, 2},
    };
    return all;
}

const DatasetInfo& dataset_info(const std::string& name) {
    for (const auto& d : known_datasets()) {
        if (d.name == name) return d;
    }
    throw std::invalid_argument("unknown dataset '" + name + "'");
}

RawDataset load_dataset(const std::string& name, const std::string& path) {
    const DatasetInfo& info = dataset_info(name);
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);

    RawDataset ds;
    ds.name = name;
    ds.n_features = info.features;
    ds.n_classes = info.classes;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            std::size_t used = 0;
            double v;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw ParseError(path + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
            }
            if (used != cell.size() && cell.find_first_not_of(" \t", used) != std::string::npos) {
                throw ParseError(path + ":" + std::to_string(lineno) + ": trailing characters in '" + cell + "'");
            }
            if (!std::isfinite(v)) throw ParseError(path + ":" + std::to_string(lineno) + ": non-finite value");
            row.push_back(v);
        }
        if (row.size() != info.features + 1) {
            throw SchemaError(path + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(info.features + 1) + " columns, got " + std::to_string(row.size()));
        }
        const double label = row.back();
        row.pop_back();
        if (label != std::floor(label) || label < 0 || label >= static_cast<double>(info.classes)) {
            throw SchemaError(path + ":" + std::to_string(lineno) + ": label out of range");
        }
        ds.x.push_back(std::move(row));
        ds.y.push_back(static_cast<int>(label));
    }
    if (ds.x.empty()) throw ParseError(path + ": no samples");
    if (ds.x.size() != info.samples) {
        throw SchemaError(path + ": expected " + std::to_string(info.samples) + " samples, got " +
                          std::to_string(ds.x.size()));
    }
    return ds;
}

EncodedDataset encode(const RawDataset& ds, std::size_t bins, std::uint64_t split_seed, double train_fraction) {
    if (bins < 2) throw std::invalid_argument("encode: bins must be >= 2");
    const std::size_t n = ds.x.size();
    EncodedDataset enc;
    enc.n_features = ds.n_features;
    enc.bins = bins;
    enc.n_classes = ds.n_classes;
    enc.y = ds.y;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto eng = keyed_engine(split_seed, 0, streams::split);
    std::shuffle(order.begin(), order.end(), eng);
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
    enc.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    enc.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());

    enc.edges.resize(ds.n_features);
    std::vector<double> lo(ds.n_features), width(ds.n_features);
    for (std::size_t f = 0; f < ds.n_features; ++f) {
        double mn = ds.x[enc.train.front()][f];
        double mx = mn;
        for (std::size_t i : enc.train) {
            mn = std::min(mn, ds.x[i][f]);
            mx = std::max(mx, ds.x[i][f]);
        }
        lo[f] = mn;
        width[f] = (mx - mn) / static_cast<double>(bins);
        if (width[f] == 0.0) {
            enc.warnings.push_back("feature " + std::to_string(f) + " is constant on the training split");
        }
        enc.edges[f].resize(bins + 1);
        for (std::size_t k = 0; k <= bins; ++k) enc.edges[f][k] = mn + width[f] * static_cast<double>(k);
        enc.edges[f][bins] = mx;
    }

    enc.x.assign(n, std::vector<std::uint8_t>(enc.width(), 0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < ds.n_features; ++f) {
            std::size_t k = 0;
            if (width[f] > 0.0) {
                const double pos = std::floor((ds.x[i][f] - lo[f]) / width[f]);
                k = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(bins - 1)));
            }
            enc.x[i][f * bins + k] = 1;
        }
    }
    return enc;
}

std::vector<double> TrainedModel::logits(const std::vector<double>& x) const {
    std::vector<double> z = b;
    for (std::size_t i = 0; i < inputs; ++i) {
        if (x[i] == 0.0) continue;
        for (std::size_t c = 0; c < classes; ++c) z[c] += x[i] * w[i * classes + c];
    }
    return z;
}

std::size_t TrainedModel::predict(const std::vector<double>& x) const {
    const std::vector<double> z = logits(x);
    return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

TrainedModel init_model(std::size_t inputs, std::size_t classes, std::uint64_t seed) {
    TrainedModel m;
    m.inputs = inputs;
    m.classes = classes;
    m.seed = seed;
    m.w.resize(inputs * classes);
    m.b.resize(classes);
    auto eng = keyed_engine(seed, 0, streams::init);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    for (double& v : m.w) v = u(eng);
    for (double& v : m.b) v = u(eng);
    return m;
}

double softmax_mse(const TrainedModel& m, const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                   std::vector<double>* grad_w, std::vector<double>* grad_b) {
    const std::size_t n = x.size();
    const std::size_t c = m.classes;
    const double norm = 1.0 / static_cast<double>(n * c);
    if (grad_w) grad_w->assign(m.w.size(), 0.0);
    if (grad_b) grad_b->assign(c, 0.0);
    double loss = 0.0;
    std::vector<double> p(c), dz(c);
    for (std::size_t s = 0; s < n; ++s) {
        const std::vector<double> z = m.logits(x[s]);
        const double zmax = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (std::size_t k = 0; k < c; ++k) {
            p[k] = std::exp(z[k] - zmax);
            sum += p[k];
        }
        // g_k = dL/dp_k; dL/dz_k = p_k * (g_k - sum_j g_j p_j)
        double gp = 0.0;
        for (std::size_t k = 0; k < c; ++k) {
            p[k] /= sum;
            const double e = p[k] - (y[s] == static_cast<int>(k) ? 1.0 : 0.0);
            loss += e * e;
            dz[k] = 2.0 * e * norm;
            gp += dz[k] * p[k];
        }
        if (!grad_w && !grad_b) continue;
        for (std::size_t k = 0; k < c; ++k) dz[k] = p[k] * (dz[k] - gp);
        if (grad_b) {
            for (std::size_t k = 0; k < c; ++k) (*grad_b)[k] += dz[k];
        }
        if (grad_w) {
            for (std::size_t i = 0; i < m.inputs; ++i) {
                const double xi = x[s][i];
                if (xi == 0.0) continue;
                for (std::size_t k = 0; k < c; ++k) (*grad_w)[i * c + k] += xi * dz[k];
            }
        }
    }
    return loss * norm;
}

std::vector<double> as_dense(const std::vector<std::uint8_t>& spikes) {
    return {spikes.begin(), spikes.end()};
}

TrainedModel train(const EncodedDataset& enc, int epochs, double lr, std::uint64_t seed) {
    if (epochs < 0 || !(lr > 0.0)) throw std::invalid_argument("train: epochs >= 0 and lr > 0 required");
    TrainedModel m = init_model(enc.width(), enc.n_classes, seed);
    m.lr = lr;
    m.epochs = epochs;

    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (std::size_t i : enc.train) {
        x.push_back(as_dense(enc.x[i]));
        y.push_back(enc.y[i]);
    }
    std::vector<double> gw, gb;
    for (int e = 0; e < epochs; ++e) {
        const double loss = softmax_mse(m, x, y, &gw, &gb);
        if (!std::isfinite(loss)) throw NonFinite("training loss diverged at epoch " + std::to_string(e));
        std::size_t correct = 0;
        for (std::size_t s = 0; s < x.size(); ++s) correct += m.predict(x[s]) == static_cast<std::size_t>(y[s]);
        m.loss_trace.push_back(loss);
        m.accuracy_trace.push_back(100.0 * static_cast<double>(correct) / static_cast<double>(x.size()));
        for (std::size_t k = 0; k < m.w.size(); ++k) m.w[k] -= lr * gw[k];
        for (std::size_t k = 0; k < m.b.size(); ++k) m.b[k] -= lr * gb[k];
    }
    for (double v : m.w) {
        if (!std::isfinite(v)) throw NonFinite("training produced non-finite weights");
    }
    return m;
}

ConductanceMap map_to_conductance(const TrainedModel& m, double current_per_siemens, double g_lo, double g_hi) {
    for (double v : m.w) {
        if (!std::isfinite(v)) throw DegenerateWeights("non-finite weight");
    }
    for (double v : m.b) {
        if (!std::isfinite(v)) throw DegenerateWeights("non-finite bias");
    }
    if (m.w.empty()) throw DegenerateWeights("empty weight matrix");
    ConductanceMap cm;
    cm.rows = m.inputs;
    cm.cols = m.classes;
    cm.g_lo = g_lo;
    cm.g_hi = g_hi;
    cm.current_per_siemens = current_per_siemens;
    const auto [wmin, wmax] = std::minmax_element(m.w.begin(), m.w.end());
    cm.w_lo = *wmin;
    cm.w_hi = *wmax;
    cm.shift = -cm.w_lo;
    const double span = cm.w_hi + cm.shift;
    // Uniform weights carry no information; keep a unit span so the bias
    // scaling stays defined.
    cm.scale = (g_hi - g_lo) / (span > 0.0 ? span : 1.0);
    cm.resistance.resize(m.w.size());
    for (std::size_t k = 0; k < m.w.size(); ++k) {
        const double g = std::min(g_hi, g_lo + (m.w[k] + cm.shift) * cm.scale);
        cm.resistance[k] = 1.0 / g;
    }
    const double bmin = *std::min_element(m.b.begin(), m.b.end());
    cm.bias.resize(m.classes);
    for (std::size_t c = 0; c < m.classes; ++c) cm.bias[c] = current_per_siemens * cm.scale * (m.b[c] - bmin);
    return cm;
}

Metrics evaluate(const Crossbar& xb, const EncodedDataset& enc, const std::vector<std::size_t>& split,
                 std::uint64_t seed) {
    Metrics mt;
    mt.n = split.size();
    mt.confusion.assign(enc.n_classes, std::vector<std::size_t>(enc.n_classes, 0));
    std::size_t correct = 0;
    std::size_t ties = 0;
    double energy = 0.0;
    for (std::size_t i : split) {
        const InferenceResult r = infer(xb, enc.x[i], seed, i);
        correct += r.winner == static_cast<std::size_t>(enc.y[i]);
        ties += r.tie;
        energy += r.energy;
        mt.confusion[static_cast<std::size_t>(enc.y[i])][r.winner]++;
    }
    if (mt.n > 0) {
        mt.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(mt.n);
        mt.tie_rate = 100.0 * static_cast<double>(ties) / static_cast<double>(mt.n);
        mt.mean_energy = energy / static_cast<double>(mt.n);
    }
    return mt;
}

Metrics evaluate_float(const TrainedModel& m, const EncodedDataset& enc, const std::vector<std::size_t>& split) {
    Metrics mt;
    mt.n = split.size();
    mt.confusion.assign(enc.n_classes, std::vector<std::size_t>(enc.n_classes, 0));
    std::size_t correct = 0;
    for (std::size_t i : split) {
        const std::size_t pred = m.predict(as_dense(enc.x[i]));
        correct += pred == static_cast<std::size_t>(enc.y[i]);
        mt.confusion[static_cast<std::size_t>(enc.y[i])][pred]++;
    }
    if (mt.n > 0) mt.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(mt.n);
    return mt;
}

}  // namespace dpe
