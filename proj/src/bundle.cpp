#include "emt/bundle.hpp"

#include <cstring>
#include <fstream>

#include "emt/error.hpp"

namespace emt {
namespace {

constexpr char kMagic[4] = {'E', 'M', 'T', 'B'};
constexpr uint32_t kVersion = 1;

class Writer {
public:
    void u8(uint8_t v) { out.push_back((char)v); }
    void u32(uint32_t v) { raw(&v, 4); }
    void u64(uint64_t v) { raw(&v, 8); }
    void f64(double v) { raw(&v, 8); }
    void str(const std::string& s) {
        u64(s.size());
        out.append(s);
    }
    void vec(const std::vector<double>& v) {
        u64(v.size());
        raw(v.data(), v.size() * 8);
    }
    void mat(const Mat& m) {
        u64(m.rows);
        u64(m.cols);
        raw(m.a.data(), m.a.size() * 8);
    }

    std::string out;

private:
    void raw(const void* p, size_t n) { out.append((const char*)p, n); }
};

class Reader {
public:
    explicit Reader(const std::string& bytes) : data_(bytes) {}

    uint8_t u8() {
        uint8_t v;
        raw(&v, 1);
        return v;
    }
    uint32_t u32() {
        uint32_t v;
        raw(&v, 4);
        return v;
    }
    uint64_t u64() {
        uint64_t v;
        raw(&v, 8);
        return v;
    }
    double f64() {
        double v;
        raw(&v, 8);
        return v;
    }
    std::string str() {
        size_t n = checked_count(u64(), 1);
        std::string s(data_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    std::vector<double> vec() {
        size_t n = checked_count(u64(), 8);
        std::vector<double> v(n);
        raw(v.data(), n * 8);
        return v;
    }
    Mat mat() {
        size_t r = checked_count(u64(), 8);
        size_t c = checked_count(u64(), 8);
        if (r != 0 && c > data_.size() / r) corrupt();
        Mat m(r, c);
        raw(m.a.data(), r * c * 8);
        return m;
    }
    void done() const {
        if (pos_ != data_.size()) corrupt();
    }

private:
    void raw(void* p, size_t n) {
        if (data_.size() - pos_ < n) corrupt();
        std::memcpy(p, data_.data() + pos_, n);
        pos_ += n;
    }
    size_t checked_count(uint64_t n, size_t elem) {
        if (n > data_.size() / elem + 1) corrupt();
        return (size_t)n;
    }
    [[noreturn]] static void corrupt() {
        fail(ErrorCategory::Data, "bundle: truncated or corrupt archive");
    }

    const std::string& data_;
    size_t pos_ = 0;
};

void write_standardizer(Writer& w, const Standardizer& s) {
    w.vec(s.mean);
    w.vec(s.stdev);
    w.u64(s.constant.size());
    for (bool c : s.constant) w.u8(c ? 1 : 0);
}

Standardizer read_standardizer(Reader& r) {
    Standardizer s;
    s.mean = r.vec();
    s.stdev = r.vec();
    size_t n = r.u64();
    s.constant.resize(n);
    for (size_t i = 0; i < n; ++i) s.constant[i] = r.u8() != 0;
    return s;
}

} // namespace

std::string serialize_bundle(const RegressorState& st) {
    Writer w;
    w.out.append(kMagic, 4);
    w.u32(kVersion);
    w.str(st.manifest_text);
    w.u8(st.kind == ModelKind::Mlp ? 0 : 1);
    w.u8((uint8_t)grid_condition_name(st.grid));
    w.u64(st.seed);
    w.vec(st.weights_kg);

    w.u8(st.maxima.mode == NormalizationMode::Global ? 0 : 1);
    w.vec(st.maxima.global);
    w.u64(st.maxima.per_condition.size());
    for (const auto& [cond, maxima] : st.maxima.per_condition) {
        w.f64(cond.weight_kg);
        w.u8(cond.movement == Movement::Grasping ? 0 : 1);
        w.vec(maxima);
    }

    w.u8(st.use_activation ? 1 : 0);
    w.u64(st.activation.size());
    for (const ActivationFit& f : st.activation) {
        w.f64(f.params.alpha);
        w.f64(f.params.beta1);
        w.f64(f.params.beta2);
        w.u32((uint32_t)f.params.delay_samples);
        w.f64(f.objective);
        w.u8(f.degenerate ? 1 : 0);
    }

    w.u8(st.has_pre_std ? 1 : 0);
    write_standardizer(w, st.pre_std);
    w.u8(st.has_pca ? 1 : 0);
    w.vec(st.pca.mean);
    w.mat(st.pca.components);
    w.vec(st.pca.explained_ratio);
    w.u64(st.pca.k);
    w.u8(st.has_post_std ? 1 : 0);
    write_standardizer(w, st.post_std);

    w.vec(st.target_scaler.lo);
    w.vec(st.target_scaler.hi);
    w.vec(st.loss_weights.w);
    w.f64(st.loss_weights.epsilon);

    w.u64(st.input_dim);
    w.u64(st.tcn_t);
    w.u64(st.tcn_c);

    w.u64(st.tensors.size());
    for (const auto& [name, data] : st.tensors) {
        w.str(name);
        w.vec(data);
    }
    return std::move(w.out);
}

RegressorState deserialize_bundle(const std::string& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        fail(ErrorCategory::Data, "bundle: bad magic");
    std::string payload = bytes.substr(4);
    Reader r(payload);
    uint32_t version = r.u32();
    if (version != kVersion)
        fail(ErrorCategory::Data,
             "bundle: unsupported version " + std::to_string(version));

    RegressorState st;
    st.manifest_text = r.str();
    st.kind = r.u8() == 0 ? ModelKind::Mlp : ModelKind::Tcn;
    st.grid = grid_condition_from_name((char)r.u8());
    st.seed = r.u64();
    st.weights_kg = r.vec();

    st.maxima.mode =
        r.u8() == 0 ? NormalizationMode::Global : NormalizationMode::ConditionSpecific;
    st.maxima.global = r.vec();
    size_t n_cond = r.u64();
    for (size_t i = 0; i < n_cond; ++i) {
        Condition c;
        c.weight_kg = r.f64();
        c.movement = r.u8() == 0 ? Movement::Grasping : Movement::Complex;
        st.maxima.per_condition[c] = r.vec();
    }

    st.use_activation = r.u8() != 0;
    size_t n_act = r.u64();
    for (size_t i = 0; i < n_act; ++i) {
        ActivationFit f;
        f.params.alpha = r.f64();
        f.params.beta1 = r.f64();
        f.params.beta2 = r.f64();
        f.params.delay_samples = (int)r.u32();
        f.objective = r.f64();
        f.degenerate = r.u8() != 0;
        st.activation.push_back(f);
    }

    st.has_pre_std = r.u8() != 0;
    st.pre_std = read_standardizer(r);
    st.has_pca = r.u8() != 0;
    st.pca.mean = r.vec();
    st.pca.components = r.mat();
    st.pca.explained_ratio = r.vec();
    st.pca.k = r.u64();
    st.has_post_std = r.u8() != 0;
    st.post_std = read_standardizer(r);

    st.target_scaler.lo = r.vec();
    st.target_scaler.hi = r.vec();
    st.loss_weights.w = r.vec();
    st.loss_weights.epsilon = r.f64();

    st.input_dim = r.u64();
    st.tcn_t = r.u64();
    st.tcn_c = r.u64();

    size_t n_tensors = r.u64();
    for (size_t i = 0; i < n_tensors; ++i) {
        std::string name = r.str();
        st.tensors.emplace_back(std::move(name), r.vec());
    }
    r.done();
    return st;
}

void save_bundle(const std::string& path, const RegressorState& st) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCategory::MissingInput, "bundle: cannot open " + path);
    std::string bytes = serialize_bundle(st);
    out.write(bytes.data(), (std::streamsize)bytes.size());
    if (!out) fail(ErrorCategory::Data, "bundle: write failed for " + path);
}

RegressorState load_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::MissingInput, "bundle: cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    return deserialize_bundle(bytes);
}

} // namespace emt
