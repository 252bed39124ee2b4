#include "dpe/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dpe {

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void write_csv(std::ostream& out, const Table& t, const Meta& meta) {
    for (const auto& [k, v] : meta) out << "# " << k << '=' << v << '\n';
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
        out << '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
}

void write_csv_file(const std::string& path, const Table& t, const Meta& meta) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_csv(out, t, meta);
}

std::string csv_body(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line, body;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '#') continue;
        body += line;
        body += '\n';
    }
    return body;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

namespace {

std::string esc(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else if (c == '&') o += "&amp;";
        else o += c;
    }
    return o;
}

}  // namespace

std::string svg_plot(const PlotSpec& spec, const std::vector<Series>& series) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
    const double W = 640, H = 420, L = 80, R = 170, T = 40, B = 60;
    const double pw = W - L - R, ph = H - T - B;

    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series) {
        for (double x : s.x) {
            const double v = spec.log_x ? std::log10(x) : x;
            x0 = std::min(x0, v);
            x1 = std::max(x1, v);
        }
        for (double y : s.y) {
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (spec.bars) {
        y0 = 0;
        if (!series.empty() && series[0].x.size() >= 2) x1 += series[0].x[1] - series[0].x[0];
    }
    if (x1 == x0) x0 -= 0.5, x1 += 0.5;
    if (y1 == y0) {
        const double pad = y0 == 0 ? 1.0 : 0.05 * std::abs(y0);
        y0 -= pad;
        y1 += pad;
    }
    const double ypad = 0.05 * (y1 - y0);
    if (!spec.bars) y0 -= ypad;
    y1 += ypad;

    auto sx = [&](double x) { return L + ((spec.log_x ? std::log10(x) : x) - x0) / (x1 - x0) * pw; };
    auto sy = [&](double y) { return T + (y1 - y) / (y1 - y0) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << esc(spec.title)
      << "</text>\n";
    o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";

    auto tick_label = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", v);
        return std::string(buf);
    };
    std::vector<double> xticks;
    if (spec.log_x) {
        for (double d = std::ceil(x0 - 1e-9); d <= x1 + 1e-9; d += 1.0) xticks.push_back(d);
    } else {
        for (int k = 0; k <= 5; ++k) xticks.push_back(x0 + (x1 - x0) * k / 5.0);
    }
    for (double fx : xticks) {
        const double px = L + (fx - x0) / (x1 - x0) * pw;
        o << "<line x1=\"" << px << "\" y1=\"" << T + ph << "\" x2=\"" << px << "\" y2=\"" << T + ph + 5
          << "\" stroke=\"black\"/>";
        o << "<text x=\"" << px << "\" y=\"" << T + ph + 18 << "\" text-anchor=\"middle\">"
          << tick_label(spec.log_x ? std::pow(10.0, fx) : fx) << "</text>\n";
    }
    for (int k = 0; k <= 5; ++k) {
        const double fy = y0 + (y1 - y0) * k / 5.0;
        const double py = T + ph - ph * k / 5.0;
        o << "<line x1=\"" << L - 5 << "\" y1=\"" << py << "\" x2=\"" << L << "\" y2=\"" << py
          << "\" stroke=\"black\"/>";
        o << "<text x=\"" << L - 8 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">" << tick_label(fy)
          << "</text>\n";
    }
    o << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << esc(spec.xlabel)
      << "</text>\n";
    o << "<text x=\"18\" y=\"" << T + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << T + ph / 2 << ")\">" << esc(spec.ylabel) << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = palette[si % std::size(palette)];
        if (spec.bars && si == 0 && s.x.size() >= 2) {
            const double step = s.x[1] - s.x[0];
            for (std::size_t k = 0; k < s.x.size(); ++k) {
                const double xa = sx(s.x[k]), xb = sx(s.x[k] + step);
                o << "<rect x=\"" << xa << "\" y=\"" << sy(s.y[k]) << "\" width=\"" << std::max(0.0, xb - xa - 1)
                  << "\" height=\"" << sy(y0) - sy(s.y[k]) << "\" fill=\"" << color << "\"/>\n";
            }
        } else {
            o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
            for (std::size_t k = 0; k < s.x.size(); ++k) o << sx(s.x[k]) << ',' << sy(s.y[k]) << ' ';
            o << "\"/>\n";
            for (std::size_t k = 0; k < s.x.size(); ++k) {
                o << "<circle cx=\"" << sx(s.x[k]) << "\" cy=\"" << sy(s.y[k]) << "\" r=\"3\" fill=\"" << color
                  << "\"/>\n";
            }
        }
        const double ly = T + 14 + 18 * static_cast<double>(si);
        o << "<rect x=\"" << L + pw + 12 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"12\" fill=\"" << color
          << "\"/><text x=\"" << L + pw + 30 << "\" y=\"" << ly + 1 << "\">" << esc(s.name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

namespace {

std::string kind_label(CellKind k) { return k == CellKind::OneT1R ? "1T1R" : "3T1R"; }

}  // namespace

Table sweep_set(const ModelParams& p, const std::vector<CellKind>& kinds, const std::vector<double>& drives) {
    Table t{{"cell", "drive_V", "I_set_uA", "I_settled_uA", "P_set_uW", "R_final_kohm"}, {}};
    for (CellKind k : kinds) {
        for (double d : drives) {
            const SetResult s = set_current(p, k, d);
            t.rows.push_back({kind_label(k), fmt_num(d), fmt_num(s.current * 1e6), fmt_num(s.settled * 1e6),
                              fmt_num(s.power * 1e6), fmt_num(s.resistance * 1e-3)});
        }
    }
    return t;
}

Table sweep_read(const ModelParams& p, const std::vector<CellKind>& kinds, const std::vector<double>& resistances,
                 Accounting acct) {
    Table t{{"cell", "R_kohm", "I_out_uA", "I_in_uA", "P_uW", "E_pJ"}, {}};
    for (CellKind k : kinds) {
        for (double r : resistances) {
            const ReadResult rr = read_current(p, {k, r}, acct);
            t.rows.push_back({kind_label(k), fmt_num(r * 1e-3), fmt_num(rr.i_out * 1e6), fmt_num(rr.i_in * 1e6),
                              fmt_num(rr.power * 1e6), fmt_num(rr.energy * 1e12)});
        }
    }
    return t;
}

Table monte_carlo_stats(CellKind kind, double r, const McStats& s) {
    Table t{{"cell", "R_kohm", "n", "mean_uA", "std_uA", "min_uA", "max_uA"}, {}};
    t.rows.push_back({kind_label(kind), fmt_num(r * 1e-3), std::to_string(s.n), fmt_num(s.mean * 1e6),
                      fmt_num(s.std * 1e6), fmt_num(s.min * 1e6), fmt_num(s.max * 1e6)});
    return t;
}

Table monte_carlo_histogram(const McStats& s) {
    Table t{{"bin_lo_uA", "bin_hi_uA", "count"}, {}};
    for (std::size_t b = 0; b < s.counts.size(); ++b) {
        t.rows.push_back({fmt_num(s.bin_edges[b] * 1e6), fmt_num(s.bin_edges[b + 1] * 1e6), std::to_string(s.counts[b])});
    }
    return t;
}

Table pulse_width(const ModelParams& p, const std::vector<CellKind>& kinds, const std::vector<double>& drives,
                  const std::vector<double>& widths) {
    Table t{{"cell", "drive_V", "width_s", "R_kohm"}, {}};
    for (CellKind k : kinds) {
        const DeviceSet& dev = p.devices(k);
        const VariationSample nominal = nominal_sample(dev);
        for (double d : drives) {
            for (double w : widths) {
                const CellInstance c = program(p, {k, p.r_initial}, d, w, nominal);
                t.rows.push_back({kind_label(k), fmt_num(d), fmt_num(w), fmt_num(c.resistance * 1e-3)});
            }
        }
    }
    return t;
}

Table compare(const ModelParams& p, Accounting acct, double r) {
    const ReadResult a = read_current(p, {CellKind::OneT1R, r}, acct);
    const ReadResult b = read_current(p, {CellKind::ThreeT1R, r}, acct);
    Table t{{"quantity", "1T1R", "3T1R", "ratio_1t1r_over_3t1r"}, {}};
    auto row = [&t](const std::string& name, double x, double y) {
        t.rows.push_back({name, fmt_num(x), fmt_num(y), fmt_num(x / y)});
    };
    row("read_current_uA", a.i_out * 1e6, (b.i_in + b.i_out) * 1e6);
    row("read_power_uW", a.power * 1e6, b.power * 1e6);
    row("read_energy_pJ", a.energy * 1e12, b.energy * 1e12);
    return t;
}

ClassifyReport classify(const ModelParams& p, const std::string& dataset, const ClassifyOptions& opts) {
    const DatasetInfo& info = dataset_info(dataset);
    const RawDataset raw = load_dataset(dataset, opts.data_dir + "/" + info.file);
    const EncodedDataset enc = encode(raw, 4, opts.seed);

    ClassifyReport rep;
    rep.dataset = dataset;
    rep.settings = p.training_for(dataset);
    rep.warnings = enc.warnings;
    rep.model = train(enc, rep.settings.epochs, rep.settings.lr, opts.seed);
    rep.float_train = evaluate_float(rep.model, enc, enc.train);
    rep.float_test = evaluate_float(rep.model, enc, enc.test);

    for (CellKind kind : opts.kinds) {
        const ReadLut lut(p, kind, opts.accounting);
        const ConductanceMap cm = map_to_conductance(rep.model, lut.transconductance(), 1.0 / p.window_hi,
                                                     1.0 / p.window_lo);
        ProgramOptions po;
        po.accounting = opts.accounting;
        po.seed = opts.seed;
        po.ideal_write = opts.ideal || kind == CellKind::OneT1R;
        po.noise = opts.program_noise && !po.ideal_write;
        KindOutcome out;
        out.kind = kind;
        out.crossbar = program_array(p, kind, cm.rows, cm.cols, cm.resistance, cm.bias, po);
        if (opts.ideal) {
            out.crossbar.adc_resolution = 0.0;
            for (std::size_t k = 0; k < out.crossbar.resistance.size(); ++k) {
                out.crossbar.cell_current[k] = cm.current_per_siemens / out.crossbar.resistance[k];
            }
        }
        out.train = evaluate(out.crossbar, enc, enc.train, opts.seed);
        out.test = evaluate(out.crossbar, enc, enc.test, opts.seed);
        rep.kinds.push_back(std::move(out));
    }
    return rep;
}

double energy_improvement(const ClassifyReport& r) {
    double e1 = 0.0, e3 = 0.0;
    for (const auto& k : r.kinds) {
        (k.kind == CellKind::OneT1R ? e1 : e3) = k.test.mean_energy;
    }
    return e1 > 0.0 && e3 > 0.0 ? e1 / e3 : 0.0;
}

Table classification_table(const std::vector<ClassifyReport>& reports) {
    Table t{{"dataset", "cell", "train_acc_pct", "test_acc_pct", "tie_rate_pct", "energy_pJ", "energy_improvement_x",
             "float_test_acc_pct"},
            {}};
    for (const auto& r : reports) {
        const double ratio = energy_improvement(r);
        for (const auto& k : r.kinds) {
            const double imp = k.kind == CellKind::OneT1R ? 1.0 : ratio;
            t.rows.push_back({r.dataset, kind_label(k.kind), fmt_num(k.train.accuracy), fmt_num(k.test.accuracy),
                              fmt_num(k.test.tie_rate), fmt_num(k.test.mean_energy * 1e12),
                              imp > 0.0 ? fmt_num(imp) : "", fmt_num(r.float_test.accuracy)});
        }
    }
    return t;
}

Table confusion_table(const std::vector<ClassifyReport>& reports) {
    Table t{{"dataset", "cell", "true_class", "predicted_class", "count"}, {}};
    for (const auto& r : reports) {
        for (const auto& k : r.kinds) {
            const auto& cm = k.test.confusion;
            for (std::size_t a = 0; a < cm.size(); ++a) {
                for (std::size_t b = 0; b < cm[a].size(); ++b) {
                    t.rows.push_back({r.dataset, kind_label(k.kind), std::to_string(a), std::to_string(b),
                                      std::to_string(cm[a][b])});
                }
            }
        }
    }
    return t;
}

}  // namespace dpe
