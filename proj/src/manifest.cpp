#include "emt/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "emt/csv.hpp"
#include "emt/error.hpp"

namespace emt {

int RunManifest::window_len_samples() const {
    return static_cast<int>(std::lround(window_ms * sample_rate_hz / 1000.0));
}

int RunManifest::hop_samples() const {
    return static_cast<int>(std::lround(window_len_samples() * (1.0 - overlap)));
}

std::vector<Condition> RunManifest::conditions() const {
    std::vector<Condition> out;
    for (double w : weights_kg)
        for (Movement m : {Movement::Grasping, Movement::Complex})
            out.push_back({w, m});
    return out;
}

void RunManifest::validate() const {
    auto bad = [](const std::string& key) {
        fail(ErrorCategory::Config, "manifest value out of range for '" + key + "'");
    };
    if (sample_rate_hz <= 0) bad("sample_rate_hz");
    if (filter_order < 2 || filter_order % 2 != 0) bad("filter_order");
    if (!(0 < low_cut_hz && low_cut_hz < high_cut_hz &&
          high_cut_hz < sample_rate_hz / 2))
        bad("low_cut_hz/high_cut_hz");
    if (!(0 < smooth_cut_hz && smooth_cut_hz < sample_rate_hz / 2)) bad("smooth_cut_hz");
    if (variance_window < 2) bad("variance_window");
    if (window_ms <= 0) bad("window_ms");
    if (!(0 < overlap && overlap < 1)) bad("overlap");
    if (!(0 < pca_retain && pca_retain <= 1)) bad("pca_retain");
    if (history < 0) bad("history");
    if (!(0 < test_fraction && test_fraction < 1)) bad("test_fraction");
    if (!(0 <= val_fraction && val_fraction < 1)) bad("val_fraction");
    if (seeds.empty()) bad("seeds");
    if (mlp_hidden.empty()) bad("mlp_hidden");
    for (int h : mlp_hidden)
        if (h < 1) bad("mlp_hidden");
    if (!(0 <= dropout && dropout < 1)) bad("dropout");
    if (l2 < 0) bad("l2");
    if (learning_rate <= 0) bad("learning_rate");
    if (batch_size < 1) bad("batch_size");
    if (max_epochs < 1) bad("max_epochs");
    if (patience < 1) bad("patience");
    if (huber_delta <= 0) bad("huber_delta");
    if (tcn_filters < 1 || tcn_kernel < 2 || tcn_dense < 1) bad("tcn");
    if (gravity <= 0) bad("gravity");
    if (synth_trials < 1) bad("synth_trials");
    if (synth_duration_s <= 0) bad("synth_duration_s");
    if (synth_noise < 0) bad("synth_noise");
    if (weights_kg.empty()) bad("weights_kg");
    for (double w : weights_kg)
        if (w < 0) bad("weights_kg");
    body.validate();
}

namespace {

template <typename T>
std::string join_list(const std::vector<T>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        if constexpr (std::is_same_v<T, double>)
            s += fmt_double(v[i]);
        else
            s += std::to_string(v[i]);
    }
    return s;
}

double to_double(const std::string& key, const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || !std::isfinite(v))
        fail(ErrorCategory::Config, "manifest key '" + key + "': bad number '" + s + "'");
    return v;
}

int to_int(const std::string& key, const std::string& s) {
    const double v = to_double(key, s);
    if (v != std::floor(v))
        fail(ErrorCategory::Config, "manifest key '" + key + "': expected integer");
    return static_cast<int>(v);
}

bool to_bool(const std::string& key, const std::string& s) {
    if (s == "true") return true;
    if (s == "false") return false;
    fail(ErrorCategory::Config, "manifest key '" + key + "': expected true/false");
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& key, const std::string& s, F conv) {
    std::vector<T> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(conv(key, item));
    if (out.empty()) fail(ErrorCategory::Config, "manifest key '" + key + "': empty list");
    return out;
}

} // namespace

RunManifest parse_manifest(const std::string& text) {
    RunManifest m;
    std::stringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        // strip trailing comment
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        // trim
        const auto b = line.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t");
        line = line.substr(b, e - b + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorCategory::Config,
                 "manifest line " + std::to_string(lineno) + ": expected key=value");
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            const auto b2 = s.find_first_not_of(" \t");
            if (b2 == std::string::npos) { s.clear(); return; }
            const auto e2 = s.find_last_not_of(" \t");
            s = s.substr(b2, e2 - b2 + 1);
        };
        trim(key);
        trim(val);

        if (key == "sample_rate_hz") m.sample_rate_hz = to_double(key, val);
        else if (key == "filter_order") m.filter_order = to_int(key, val);
        else if (key == "low_cut_hz") m.low_cut_hz = to_double(key, val);
        else if (key == "high_cut_hz") m.high_cut_hz = to_double(key, val);
        else if (key == "smooth_cut_hz") m.smooth_cut_hz = to_double(key, val);
        else if (key == "variance_window") m.variance_window = to_int(key, val);
        else if (key == "window_ms") m.window_ms = to_double(key, val);
        else if (key == "overlap") m.overlap = to_double(key, val);
        else if (key == "norm_mode") {
            if (val == "global") m.norm_mode = NormalizationMode::Global;
            else if (val == "condition") m.norm_mode = NormalizationMode::ConditionSpecific;
            else fail(ErrorCategory::Config, "norm_mode must be global|condition");
        }
        else if (key == "use_time_points") m.use_time_points = to_bool(key, val);
        else if (key == "use_rms") m.use_rms = to_bool(key, val);
        else if (key == "use_wl") m.use_wl = to_bool(key, val);
        else if (key == "use_ssc") m.use_ssc = to_bool(key, val);
        else if (key == "use_band_power") m.use_band_power = to_bool(key, val);
        else if (key == "use_morlet") m.use_morlet = to_bool(key, val);
        else if (key == "use_activation") m.use_activation = to_bool(key, val);
        else if (key == "activation_target") {
            if (val == "smoothed") m.activation_target = ActivationTarget::Smoothed;
            else if (val == "oracle") m.activation_target = ActivationTarget::Oracle;
            else fail(ErrorCategory::Config, "activation_target must be smoothed|oracle");
        }
        else if (key == "pca_retain") m.pca_retain = to_double(key, val);
        else if (key == "history") m.history = to_int(key, val);
        else if (key == "test_fraction") m.test_fraction = to_double(key, val);
        else if (key == "val_fraction") m.val_fraction = to_double(key, val);
        else if (key == "split_seed") m.split_seed = static_cast<uint64_t>(to_int(key, val));
        else if (key == "model") {
            if (val == "mlp") m.model = ModelKind::Mlp;
            else if (val == "tcn") m.model = ModelKind::Tcn;
            else fail(ErrorCategory::Config, "model must be mlp|tcn");
        }
        else if (key == "seeds")
            m.seeds = to_list<uint64_t>(key, val, [](const std::string& k, const std::string& s) {
                return static_cast<uint64_t>(to_int(k, s));
            });
        else if (key == "mlp_hidden")
            m.mlp_hidden = to_list<int>(key, val, to_int);
        else if (key == "dropout") m.dropout = to_double(key, val);
        else if (key == "l2") m.l2 = to_double(key, val);
        else if (key == "learning_rate") m.learning_rate = to_double(key, val);
        else if (key == "batch_size") m.batch_size = to_int(key, val);
        else if (key == "max_epochs") m.max_epochs = to_int(key, val);
        else if (key == "patience") m.patience = to_int(key, val);
        else if (key == "huber_delta") m.huber_delta = to_double(key, val);
        else if (key == "tcn_filters") m.tcn_filters = to_int(key, val);
        else if (key == "tcn_kernel") m.tcn_kernel = to_int(key, val);
        else if (key == "tcn_dense") m.tcn_dense = to_int(key, val);
        else if (key == "eq1_variant") {
            if (val == "as_printed") m.eq1_variant = Eq1Variant::AsPrinted;
            else if (val == "moment_arm_x") m.eq1_variant = Eq1Variant::MomentArmX;
            else fail(ErrorCategory::Config, "eq1_variant must be as_printed|moment_arm_x");
        }
        else if (key == "body_mass_kg") m.body.body_mass_kg = to_double(key, val);
        else if (key == "sex") {
            if (val == "male") m.body.sex = Sex::Male;
            else if (val == "female") m.body.sex = Sex::Female;
            else fail(ErrorCategory::Config, "sex must be male|female");
        }
        else if (key == "hand_length_m") m.body.hand_length_m = to_double(key, val);
        else if (key == "upper_arm_length_m") m.body.upper_arm_length_m = to_double(key, val);
        else if (key == "forearm_length_m") m.body.forearm_length_m = to_double(key, val);
        else if (key == "gravity") m.gravity = to_double(key, val);
        else if (key == "synth_trials") m.synth_trials = to_int(key, val);
        else if (key == "synth_duration_s") m.synth_duration_s = to_double(key, val);
        else if (key == "synth_noise") m.synth_noise = to_double(key, val);
        else if (key == "synth_seed") m.synth_seed = static_cast<uint64_t>(to_int(key, val));
        else if (key == "weights_kg")
            m.weights_kg = to_list<double>(key, val, to_double);
        else if (key == "data_dir") m.data_dir = val;
        else if (key == "out_dir") m.out_dir = val;
        else fail(ErrorCategory::Config, "unknown manifest key '" + key + "'");
    }
    m.validate();
    return m;
}

RunManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCategory::MissingInput, "cannot open manifest " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str());
}

std::string serialize_manifest(const RunManifest& m) {
    std::map<std::string, std::string> kv;
    kv["sample_rate_hz"] = fmt_double(m.sample_rate_hz);
    kv["filter_order"] = std::to_string(m.filter_order);
    kv["low_cut_hz"] = fmt_double(m.low_cut_hz);
    kv["high_cut_hz"] = fmt_double(m.high_cut_hz);
    kv["smooth_cut_hz"] = fmt_double(m.smooth_cut_hz);
    kv["variance_window"] = std::to_string(m.variance_window);
    kv["window_ms"] = fmt_double(m.window_ms);
    kv["overlap"] = fmt_double(m.overlap);
    kv["norm_mode"] = m.norm_mode == NormalizationMode::Global ? "global" : "condition";
    kv["use_time_points"] = m.use_time_points ? "true" : "false";
    kv["use_rms"] = m.use_rms ? "true" : "false";
    kv["use_wl"] = m.use_wl ? "true" : "false";
    kv["use_ssc"] = m.use_ssc ? "true" : "false";
    kv["use_band_power"] = m.use_band_power ? "true" : "false";
    kv["use_morlet"] = m.use_morlet ? "true" : "false";
    kv["use_activation"] = m.use_activation ? "true" : "false";
    kv["activation_target"] =
        m.activation_target == ActivationTarget::Smoothed ? "smoothed" : "oracle";
    kv["pca_retain"] = fmt_double(m.pca_retain);
    kv["history"] = std::to_string(m.history);
    kv["test_fraction"] = fmt_double(m.test_fraction);
    kv["val_fraction"] = fmt_double(m.val_fraction);
    kv["split_seed"] = std::to_string(m.split_seed);
    kv["model"] = m.model == ModelKind::Mlp ? "mlp" : "tcn";
    kv["seeds"] = join_list(m.seeds);
    kv["mlp_hidden"] = join_list(m.mlp_hidden);
    kv["dropout"] = fmt_double(m.dropout);
    kv["l2"] = fmt_double(m.l2);
    kv["learning_rate"] = fmt_double(m.learning_rate);
    kv["batch_size"] = std::to_string(m.batch_size);
    kv["max_epochs"] = std::to_string(m.max_epochs);
    kv["patience"] = std::to_string(m.patience);
    kv["huber_delta"] = fmt_double(m.huber_delta);
    kv["tcn_filters"] = std::to_string(m.tcn_filters);
    kv["tcn_kernel"] = std::to_string(m.tcn_kernel);
    kv["tcn_dense"] = std::to_string(m.tcn_dense);
    kv["eq1_variant"] =
        m.eq1_variant == Eq1Variant::AsPrinted ? "as_printed" : "moment_arm_x";
    kv["body_mass_kg"] = fmt_double(m.body.body_mass_kg);
    kv["sex"] = m.body.sex == Sex::Male ? "male" : "female";
    kv["hand_length_m"] = fmt_double(m.body.hand_length_m);
    kv["upper_arm_length_m"] = fmt_double(m.body.upper_arm_length_m);
    kv["forearm_length_m"] = fmt_double(m.body.forearm_length_m);
    kv["gravity"] = fmt_double(m.gravity);
    kv["synth_trials"] = std::to_string(m.synth_trials);
    kv["synth_duration_s"] = fmt_double(m.synth_duration_s);
    kv["synth_noise"] = fmt_double(m.synth_noise);
    kv["synth_seed"] = std::to_string(m.synth_seed);
    kv["weights_kg"] = join_list(m.weights_kg);
    kv["data_dir"] = m.data_dir;
    kv["out_dir"] = m.out_dir;

    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

void save_manifest(const std::string& path, const RunManifest& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCategory::MissingInput, "cannot write manifest " + path);
    out << serialize_manifest(m);
}

uint64_t manifest_hash(const RunManifest& m) {
    const std::string s = serialize_manifest(m);
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace emt
