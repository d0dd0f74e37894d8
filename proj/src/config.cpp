#include "eeamc/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "eeamc/error.hpp"

namespace eeamc {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

long long parse_int(const std::string& v, const std::string& key) {
    long long out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    return out;
}

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError("key '" + key + "': expected an unsigned integer, got '" + v + "'");
    return out;
}

double parse_real(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a real number, got '" + v + "'");
    }
}

std::vector<double> parse_real_list(const std::string& v, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("key '" + key + "': empty list element");
        out.push_back(parse_real(item, key));
    }
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
}

std::array<int, 6> parse_int6(const std::string& v, const std::string& key) {
    std::array<int, 6> out{};
    std::stringstream ss(v);
    std::string item;
    int n = 0;
    while (std::getline(ss, item, ',')) {
        if (n >= 6) throw ConfigError("key '" + key + "': expected exactly 6 integers");
        out[std::size_t(n++)] = int(parse_int(trim(item), key));
    }
    if (n != 6) throw ConfigError("key '" + key + "': expected exactly 6 integers");
    return out;
}

std::string fmt_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

} // namespace

void apply_config_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    // gen
    if (key == "gen.samples_per_cell") cfg.gen.samples_per_cell = int(parse_int(value, key));
    else if (key == "gen.seed") cfg.gen.seed = parse_u64(value, key);
    else if (key == "gen.samples_per_symbol") cfg.gen.samples_per_symbol = int(parse_int(value, key));
    else if (key == "gen.rrc_rolloff") cfg.gen.rrc_rolloff = parse_real(value, key);
    else if (key == "gen.gfsk_bt") cfg.gen.gfsk_bt = parse_real(value, key);
    else if (key == "gen.cpfsk_mod_index") cfg.gen.cpfsk_mod_index = parse_real(value, key);
    else if (key == "gen.cfo_fraction") cfg.gen.cfo_fraction = parse_real(value, key);
    else if (key == "gen.random_phase") cfg.gen.random_phase = parse_bool(value, key);
    // data
    else if (key == "data.split_seed") cfg.split_seed = parse_u64(value, key);
    // arch
    else if (key == "arch.variant") {
        variant_from_string(value);  // validates
        cfg.variant = value;
    }
    else if (key == "arch.channels") cfg.arch.conv_channels = parse_int6(value, key);
    else if (key == "arch.kernel_size") {
        const int k = int(parse_int(value, key));
        cfg.arch.conv_kernels = {k, k, k, k, k, k};
    }
    else if (key == "arch.dropout") cfg.arch.dropout_rate = float(parse_real(value, key));
    else if (key == "arch.exit_fc_width") cfg.arch.exit_fc_width = int(parse_int(value, key));
    // train
    else if (key == "train.epochs") cfg.train.epochs = int(parse_int(value, key));
    else if (key == "train.batch_size") cfg.train.batch_size = int(parse_int(value, key));
    else if (key == "train.optimizer") {
        if (value != "adam" && value != "sgd")
            throw ConfigError("key '" + key + "': expected adam or sgd, got '" + value + "'");
        cfg.optimizer = value;
    }
    else if (key == "train.lr") cfg.lr = parse_real(value, key);
    else if (key == "train.momentum") cfg.sgd_momentum = parse_real(value, key);
    else if (key == "train.seed") cfg.train.seed = parse_u64(value, key);
    else if (key == "train.shuffle") cfg.train.shuffle = parse_bool(value, key);
    else if (key == "train.patience") cfg.train.patience = int(parse_int(value, key));
    // gate / eval
    else if (key == "gate.threshold") {
        const double t = parse_real(value, key);
        if (t < 0.0) throw ConfigError("key '" + key + "': threshold must be >= 0");
        cfg.gate.threshold = t;
    }
    else if (key == "eval.thresholds") cfg.sweep_thresholds = parse_real_list(value, key);
    else if (key == "eval.repeats") cfg.eval_repeats = int(parse_int(value, key));
    // paths
    else if (key == "paths.dataset") cfg.dataset_path = value;
    else if (key == "paths.checkpoint") cfg.checkpoint_path = value;
    else if (key == "paths.out") cfg.out_dir = value;
    else
        throw ConfigError("unknown key '" + key + "'");
}

void ExperimentConfig::finalize() {
    gen.validate();
    arch.validate();
    variant_from_string(variant);
    if (eval_repeats < 1) throw ConfigError("eval.repeats must be >= 1");
    for (double t : sweep_thresholds)
        if (t < 0.0) throw ConfigError("eval.thresholds entries must be >= 0");

    OptimizerSpec spec = optimizer == "adam" ? OptimizerSpec::adam(float(lr))
                                             : OptimizerSpec::sgd(float(lr), float(sgd_momentum));
    train.opt1 = spec;
    train.opt2 = spec;
    train.validate();
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || (value.empty() && key.rfind("paths.", 0) != 0))
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        try {
            apply_config_key(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    cfg.finalize();
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string echo_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "gen.samples_per_cell = " << cfg.gen.samples_per_cell << "\n";
    out << "gen.seed = " << cfg.gen.seed << "\n";
    out << "gen.samples_per_symbol = " << cfg.gen.samples_per_symbol << "\n";
    out << "gen.rrc_rolloff = " << fmt_real(cfg.gen.rrc_rolloff) << "\n";
    out << "gen.gfsk_bt = " << fmt_real(cfg.gen.gfsk_bt) << "\n";
    out << "gen.cpfsk_mod_index = " << fmt_real(cfg.gen.cpfsk_mod_index) << "\n";
    out << "gen.cfo_fraction = " << fmt_real(cfg.gen.cfo_fraction) << "\n";
    out << "gen.random_phase = " << (cfg.gen.random_phase ? "true" : "false") << "\n";
    out << "data.split_seed = " << cfg.split_seed << "\n";
    out << "arch.variant = " << cfg.variant << "\n";
    out << "arch.channels = ";
    for (int i = 0; i < 6; ++i) out << (i ? "," : "") << cfg.arch.conv_channels[std::size_t(i)];
    out << "\n";
    out << "arch.kernel_size = " << cfg.arch.conv_kernels[0] << "\n";
    out << "arch.dropout = " << fmt_real(cfg.arch.dropout_rate) << "\n";
    out << "arch.exit_fc_width = " << cfg.arch.exit_fc_width << "\n";
    out << "train.epochs = " << cfg.train.epochs << "\n";
    out << "train.batch_size = " << cfg.train.batch_size << "\n";
    out << "train.optimizer = " << cfg.optimizer << "\n";
    out << "train.lr = " << fmt_real(cfg.lr) << "\n";
    out << "train.momentum = " << fmt_real(cfg.sgd_momentum) << "\n";
    out << "train.seed = " << cfg.train.seed << "\n";
    out << "train.shuffle = " << (cfg.train.shuffle ? "true" : "false") << "\n";
    out << "train.patience = " << cfg.train.patience << "\n";
    out << "gate.threshold = " << fmt_real(cfg.gate.threshold) << "\n";
    out << "eval.thresholds = ";
    for (std::size_t i = 0; i < cfg.sweep_thresholds.size(); ++i)
        out << (i ? "," : "") << fmt_real(cfg.sweep_thresholds[i]);
    out << "\n";
    out << "eval.repeats = " << cfg.eval_repeats << "\n";
    out << "paths.dataset = " << cfg.dataset_path << "\n";
    out << "paths.checkpoint = " << cfg.checkpoint_path << "\n";
    out << "paths.out = " << cfg.out_dir << "\n";
    return out.str();
}

} // namespace eeamc
