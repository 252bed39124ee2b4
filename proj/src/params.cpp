#include "dpe/params.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace dpe {

namespace {

MosfetParams fet(Polarity pol, double vth, double kp, double lambda, double sigma_vth, double sigma_kp) {
    return {pol, vth, kp, lambda, sigma_vth, sigma_kp};
}

const char* role_key(Role r) {
    switch (r) {
        case Role::MN1: return "mn1";
        case Role::MN2: return "mn2";
        case Role::MP3: return "mp3";
    }
    return "?";
}

template <typename T>
T get(const YAML::Node& node, const char* key, const std::string& where) {
    const YAML::Node v = node[key];
    if (!v) throw ConfigError("missing key '" + where + "." + key + "'");
    try {
        return v.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError("bad value for '" + where + "." + key + "'");
    }
}

template <typename T>
void get_opt(const YAML::Node& node, const char* key, T& out, const std::string& where) {
    if (node[key]) out = get<T>(node, key, where);
}

MosfetParams read_fet(const YAML::Node& n, Polarity pol, const std::string& where) {
    if (!n || !n.IsMap()) throw ConfigError("missing transistor block '" + where + "'");
    MosfetParams p;
    p.polarity = pol;
    p.vth = get<double>(n, "vth", where);
    p.kp = get<double>(n, "kp", where);
    p.lambda = get<double>(n, "lambda", where);
    get_opt(n, "sigma_vth", p.sigma_vth, where);
    get_opt(n, "sigma_kp_rel", p.sigma_kp_rel, where);
    if (!(p.kp > 0.0)) throw ConfigError(where + ".kp must be positive");
    if (p.lambda < 0.0 || p.sigma_vth < 0.0 || p.sigma_kp_rel < 0.0) {
        throw ConfigError(where + ": lambda and sigmas must be non-negative");
    }
    return p;
}

void emit_fet(YAML::Emitter& out, const MosfetParams& p) {
    out << YAML::BeginMap;
    out << YAML::Key << "vth" << YAML::Value << p.vth;
    out << YAML::Key << "kp" << YAML::Value << p.kp;
    out << YAML::Key << "lambda" << YAML::Value << p.lambda;
    out << YAML::Key << "sigma_vth" << YAML::Value << p.sigma_vth;
    out << YAML::Key << "sigma_kp_rel" << YAML::Value << p.sigma_kp_rel;
    out << YAML::EndMap;
}

}  // namespace

TrainSettings ModelParams::training_for(const std::string& dataset) const {
    if (auto it = training.find(dataset); it != training.end()) return it->second;
    if (auto it = training.find("default"); it != training.end()) return it->second;
    return {};
}

ModelParams default_params() {
    ModelParams p;
    p.one_t1r.count = 1;
    p.one_t1r[Role::MN1] = fet(Polarity::N, 1.054, 0.01265, 0.0, 0.0102, 0.04);

    p.three_t1r.count = 3;
    p.three_t1r[Role::MN1] = fet(Polarity::N, 0.5557, 1.27e-3, 0.0, 0.0102, 0.04);
    p.three_t1r[Role::MN2] = fet(Polarity::N, 0.9025, 1.3257e-5, 0.0, 0.0102, 0.04);
    p.three_t1r[Role::MP3] = fet(Polarity::P, 0.30, 5e-5, 0.223, 0.0102, 0.04);

    p.memristor.a_rate = 4e-6;
    p.memristor.v0 = 0.005;
    p.read.vdd = 1.6;
    p.training["default"] = {};
    return p;
}

std::string params_to_yaml(const ModelParams& p) {
    YAML::Emitter out;
    out.SetDoublePrecision(12);
    out << YAML::BeginMap;
    out << YAML::Key << "version" << YAML::Value << ModelParams::kVersion;

    out << YAML::Key << "memristor" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "r_on" << YAML::Value << p.memristor.r_on;
    out << YAML::Key << "r_off" << YAML::Value << p.memristor.r_off;
    out << YAML::Key << "v_set" << YAML::Value << p.memristor.v_set;
    out << YAML::Key << "a_rate" << YAML::Value << p.memristor.a_rate;
    out << YAML::Key << "v0" << YAML::Value << p.memristor.v0;
    out << YAML::Key << "lrs_sigma_knots" << YAML::Value << YAML::BeginSeq;
    for (const auto& [v, s] : p.memristor.lrs_noise.knots) {
        out << YAML::Flow << YAML::BeginSeq << v << s << YAML::EndSeq;
    }
    out << YAML::EndSeq << YAML::EndMap;

    out << YAML::Key << "one_t1r" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "mn1" << YAML::Value;
    emit_fet(out, p.one_t1r[Role::MN1]);
    out << YAML::EndMap;

    out << YAML::Key << "three_t1r" << YAML::Value << YAML::BeginMap;
    for (Role r : {Role::MN1, Role::MN2, Role::MP3}) {
        out << YAML::Key << role_key(r) << YAML::Value;
        emit_fet(out, p.three_t1r[r]);
    }
    out << YAML::EndMap;

    out << YAML::Key << "read" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "v_in" << YAML::Value << p.read.v_in;
    out << YAML::Key << "v_g" << YAML::Value << p.read.v_g;
    out << YAML::Key << "vdd" << YAML::Value << p.read.vdd;
    out << YAML::Key << "v_readb" << YAML::Value << p.read.v_readb;
    out << YAML::EndMap;

    out << YAML::Key << "write" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "vdd" << YAML::Value << p.write.vdd;
    out << YAML::Key << "v_g" << YAML::Value << p.write.v_g;
    out << YAML::Key << "v_readb" << YAML::Value << p.write.v_readb;
    out << YAML::EndMap;

    out << YAML::Key << "timing" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "t_read" << YAML::Value << p.t_read;
    out << YAML::Key << "set_pulse_width" << YAML::Value << p.set_pulse_width;
    out << YAML::Key << "dt" << YAML::Value << p.transient.dt;
    out << YAML::Key << "max_dw" << YAML::Value << p.transient.max_dw;
    out << YAML::EndMap;

    out << YAML::Key << "r_initial" << YAML::Value << p.r_initial;
    out << YAML::Key << "window" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "r_min" << YAML::Value << p.window_lo;
    out << YAML::Key << "r_max" << YAML::Value << p.window_hi;
    out << YAML::EndMap;
    out << YAML::Key << "adc_resolution" << YAML::Value << p.adc_resolution;

    out << YAML::Key << "training" << YAML::Value << YAML::BeginMap;
    for (const auto& [name, t] : p.training) {
        out << YAML::Key << name << YAML::Value << YAML::Flow << YAML::BeginMap;
        out << YAML::Key << "lr" << YAML::Value << t.lr;
        out << YAML::Key << "epochs" << YAML::Value << t.epochs;
        out << YAML::EndMap;
    }
    out << YAML::EndMap;

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

ModelParams params_from_yaml(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("YAML parse error: ") + e.what());
    }
    if (!root.IsMap()) throw ConfigError("config root must be a map");
    const int version = get<int>(root, "version", "");
    if (version != ModelParams::kVersion) {
        throw ConfigError("unsupported config version " + std::to_string(version));
    }

    ModelParams p;
    const YAML::Node m = root["memristor"];
    if (!m) throw ConfigError("missing 'memristor' block");
    p.memristor.r_on = get<double>(m, "r_on", "memristor");
    p.memristor.r_off = get<double>(m, "r_off", "memristor");
    p.memristor.v_set = get<double>(m, "v_set", "memristor");
    p.memristor.a_rate = get<double>(m, "a_rate", "memristor");
    p.memristor.v0 = get<double>(m, "v0", "memristor");
    if (const YAML::Node k = m["lrs_sigma_knots"]) {
        p.memristor.lrs_noise.knots.clear();
        for (const auto& pair : k) {
            if (!pair.IsSequence() || pair.size() != 2) throw ConfigError("lrs_sigma_knots entries are [drive, sigma]");
            p.memristor.lrs_noise.knots.emplace_back(pair[0].as<double>(), pair[1].as<double>());
        }
    }
    if (!(p.memristor.r_on > 0.0 && p.memristor.r_on < p.memristor.r_off)) {
        throw ConfigError("memristor: need 0 < r_on < r_off");
    }
    if (!(p.memristor.v_set > 0.0 && p.memristor.v0 > 0.0 && p.memristor.a_rate > 0.0)) {
        throw ConfigError("memristor: v_set, v0 and a_rate must be positive");
    }

    p.one_t1r.count = 1;
    p.one_t1r[Role::MN1] = read_fet(root["one_t1r"]["mn1"], Polarity::N, "one_t1r.mn1");
    p.three_t1r.count = 3;
    p.three_t1r[Role::MN1] = read_fet(root["three_t1r"]["mn1"], Polarity::N, "three_t1r.mn1");
    p.three_t1r[Role::MN2] = read_fet(root["three_t1r"]["mn2"], Polarity::N, "three_t1r.mn2");
    p.three_t1r[Role::MP3] = read_fet(root["three_t1r"]["mp3"], Polarity::P, "three_t1r.mp3");

    if (const YAML::Node r = root["read"]) {
        get_opt(r, "v_in", p.read.v_in, "read");
        get_opt(r, "v_g", p.read.v_g, "read");
        get_opt(r, "vdd", p.read.vdd, "read");
        get_opt(r, "v_readb", p.read.v_readb, "read");
    }
    if (const YAML::Node w = root["write"]) {
        get_opt(w, "vdd", p.write.vdd, "write");
        get_opt(w, "v_g", p.write.v_g, "write");
        get_opt(w, "v_readb", p.write.v_readb, "write");
    }
    if (const YAML::Node t = root["timing"]) {
        get_opt(t, "t_read", p.t_read, "timing");
        get_opt(t, "set_pulse_width", p.set_pulse_width, "timing");
        get_opt(t, "dt", p.transient.dt, "timing");
        get_opt(t, "max_dw", p.transient.max_dw, "timing");
    }
    get_opt(root, "r_initial", p.r_initial, "");
    if (const YAML::Node w = root["window"]) {
        get_opt(w, "r_min", p.window_lo, "window");
        get_opt(w, "r_max", p.window_hi, "window");
    }
    get_opt(root, "adc_resolution", p.adc_resolution, "");
    if (const YAML::Node tr = root["training"]) {
        for (const auto& kv : tr) {
            const std::string name = kv.first.as<std::string>();
            TrainSettings s;
            get_opt(kv.second, "lr", s.lr, "training." + name);
            get_opt(kv.second, "epochs", s.epochs, "training." + name);
            if (!(s.lr > 0.0) || s.epochs < 0) throw ConfigError("training." + name + ": bad hyperparameters");
            p.training[name] = s;
        }
    }
    if (!(p.t_read > 0.0 && p.transient.dt > 0.0 && p.transient.max_dw > 0.0)) {
        throw ConfigError("timing values must be positive");
    }
    if (!(p.window_lo > 0.0 && p.window_lo < p.window_hi)) throw ConfigError("window: need 0 < r_min < r_max");
    if (!(p.adc_resolution >= 0.0)) throw ConfigError("adc_resolution must be >= 0");
    return p;
}

ModelParams load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return params_from_yaml(ss.str());
}

void save_params(const ModelParams& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config '" + path + "'");
    out << "# Device and circuit parameters for dpesim. Regenerate with `dpesim calibrate`.\n";
    out << params_to_yaml(p);
}

std::string config_hash(const ModelParams& p) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : params_to_yaml(p)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

CellTopology read_topology(const ModelParams& p, CellKind kind) {
    CellTopology t;
    t.kind = kind;
    t.devices = p.devices(kind);
    t.rails.v_in = p.read.v_in;
    t.rails.v_g = p.read.v_g;
    t.rails.vdd = p.read.vdd;
    t.rails.v_readb = p.read.v_readb;
    t.rails.v_column = p.read.vdd;
    return t;
}

CellTopology write_topology(const ModelParams& p, CellKind kind) {
    CellTopology t;
    t.kind = kind;
    t.devices = p.devices(kind);
    t.rails.v_in = 0.0;
    t.rails.v_g = p.write.v_g;
    t.rails.vdd = p.write.vdd;
    t.rails.v_readb = p.write.v_readb;
    // MN2 is not sensed during SET; its drain is left at the read column level.
    t.rails.v_column = p.read.vdd;
    return t;
}

}  // namespace dpe
